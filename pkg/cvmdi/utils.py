import math
import os
import time

if os.name != 'nt':
    import resource

import numpy


# Some boring utility functions


def ordered_fsum(values):
    # Exactly rounded, so the result does not depend on how work was chunked
    return math.fsum(float(v) for v in values)


def sum_columns(rows):
    """Sum a list of equal-length tuples column by column with fsum."""
    if len(rows) == 0:
        return ()
    return tuple(ordered_fsum(col) for col in zip(*rows))


def get_cpu_time_with_children():
    if os.name != 'nt':
        time_self = resource.getrusage(resource.RUSAGE_SELF)
        time_children = resource.getrusage(resource.RUSAGE_CHILDREN)
        return (
            time_self.ru_utime
            + time_self.ru_stime
            + time_children.ru_utime
            + time_children.ru_stime
        )
    else:
        return time.process_time()


def randomFromSeed(seed, block=0):
    """A counter-based generator for one (seed, block) pair.

    Streams for different blocks are independent, so a Monte Carlo run can
    be split over any number of workers without changing its result.
    """
    if isinstance(seed, str):
        seed = [ord(c) for c in seed]
    else:
        seed = [int(seed)]
    ss = numpy.random.SeedSequence(seed + [int(block)])
    return numpy.random.Generator(numpy.random.Philox(ss))
