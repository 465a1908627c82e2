"""Work bounds and the exceptions raised when a computation would exceed them."""

import os

# units are vectorized element operations; one interpreted loop step costs PYTHON_STEP units
DEFAULT_WORK_BOUND = 10**10
PYTHON_STEP = 1000
POINT_LIMIT = 10**7
ENV_VAR = "KSPHERE_WORK_BOUND"


class WorkBoundExceeded(RuntimeError):
    """Raised when an operation would need more elementary steps than allowed."""


def work_bound() -> int:
    raw = os.environ.get(ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_WORK_BOUND
    try:
        value = int(float(raw))
    except ValueError as exc:
        raise ValueError(f"{ENV_VAR} must be a number, got {raw!r}") from exc
    if value <= 0:
        raise ValueError(f"{ENV_VAR} must be positive, got {value}")
    return value


def check_work(estimate: float, what: str, bound: int | None = None) -> None:
    limit = work_bound() if bound is None else bound
    if estimate > limit:
        raise WorkBoundExceeded(
            f"{what}: estimated {estimate:.3g} operations exceeds work bound {limit:.3g}"
        )
