from concurrent.futures import ThreadPoolExecutor


def pmap(fn, items, workers=1):
    """Ordered map over ``items``; thread-parallel when ``workers > 1``.

    Each call of ``fn`` must touch only its own output so results do not
    depend on the worker count.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))
