import itertools
import logging
import os
import sys

from multiprocessing import Process, Queue, get_start_method

# Set in children so nested map calls run serially instead of forking again
_in_worker = False


def inWorker():
    return _in_worker


# Magic from https://stackoverflow.com/questions/2130016/splitting-a-list-into-n-parts-of-approximately-equal-length
def split(a, n):
    k, m = divmod(len(a), n)
    # Listify this so we check the lengths here
    return list(
        list(a[i * k + min(i, m): (i + 1) * k + min(i + 1, m)])
        for i in range(n)
    )


# Serial pool, used for one core, on Windows, inside workers, and for profiling
class FakePool:
    def __init__(self):
        pass

    def map(self, func, args):
        return list(map(func, args))

    def __enter__(self):
        return self

    def __exit__(self, a, b, c):
        pass


def getPool(cores):
    if cores <= 1 or os.name == 'nt' or _in_worker:
        return FakePool()
    else:
        return ProcessPool(processes=cores)


def doprocess(inqueue, outqueue):
    global _in_worker
    _in_worker = True
    while True:
        (func, msg) = inqueue.get()
        if func is None:
            if msg is None:
                break
            print("Invalid message to child")
            sys.exit(1)
        try:
            outqueue.put((True, func(msg)))
        except Exception as e:  # sent back and re-raised in the parent
            outqueue.put((False, e))


class ProcessPool:
    """A fork-based pool whose map() returns results in task order.

    Tasks travel through queues, so func must be a module-level function
    (or a functools.partial of one) and arguments and results picklable.
    """

    def __init__(self, processes):
        assert processes > 1
        self._processcount = processes
        self._started = False

    def map(self, func, args):
        args = list(args)
        if len(args) == 0:
            return []
        chunks = split(args, min(self._processcount, len(args)))
        logging.info("Chunked %s in %s", len(args), [len(c) for c in chunks])
        for i, chunk in enumerate(chunks):
            for c in chunk:
                self._inqueues[i].put((func, c))

        results = []
        error = None
        for i in range(len(chunks)):
            l = []
            for _ in chunks[i]:
                (ok, x) = self._outqueues[i].get()
                if not ok and error is None:
                    error = x
                l.append(x)
            results.append(l)
        if error is not None:
            raise error

        flat = list(itertools.chain(*results))
        assert len(flat) == len(args)
        return flat

    def __enter__(self):
        assert get_start_method() == "fork"
        assert not self._started
        self._inqueues = [Queue() for i in range(self._processcount)]
        self._outqueues = [Queue() for i in range(self._processcount)]
        self._processes = [
            Process(target=doprocess, args=(self._inqueues[i], self._outqueues[i]))
            for i in range(self._processcount)
        ]
        for p in self._processes:
            p.start()
        self._started = True
        return self

    def __exit__(self, a, b, c):
        for q in self._inqueues:
            q.put((None, None))
        for p in self._processes:
            p.join()
        return False
