"""Global counter of spectral-transform kernel invocations.

Lets tests assert that cheap code paths (eval-mode dropout in particular)
really skip all transform work instead of computing and discarding it.
Single-threaded by design, like the kernels it instruments.
"""

_count = 0


def bump(n: int = 1) -> None:
    global _count
    _count += n


def value() -> int:
    return _count


def reset() -> None:
    global _count
    _count = 0
