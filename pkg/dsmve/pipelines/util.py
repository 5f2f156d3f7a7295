import asyncio
import functools
import math
from typing import Any, Callable, Tuple


async def run_blocking(fn: Callable, *args, **kwargs) -> Any:
    "runs numeric work in the default executor so the event loop stays free"
    loop = asyncio.get_running_loop()
    return await loop.run_in_executor(None, functools.partial(fn, *args, **kwargs))


def format_ci(ci: Tuple[float, float]) -> str:
    lo, hi = ci
    if math.isnan(lo) or math.isnan(hi):
        return "[n/a]"
    return f"[{lo:.4f}, {hi:.4f}]"
