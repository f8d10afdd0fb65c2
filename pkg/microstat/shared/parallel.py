"""
Ordered parallel map over independent work units.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(
    func: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None
) -> list[R]:
    """
    Apply func to every item, returning results in input order.

    Args:
        func: Function applied to each item
        items: Work units
        threads: Worker count. None falls back to the global setting from
            microstat.configure(); 1 or None runs sequentially.

    Returns:
        list: Results in the same order as items
    """
    if threads is None:
        from microstat import get_threads

        threads = get_threads()

    items = list(items)
    if not threads or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
