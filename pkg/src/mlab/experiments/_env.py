"""Map ``MLAB_THREADS`` onto the BLAS/OpenMP thread variables.

Only effective when imported before numpy; existing settings win.
"""
import os

_n = os.environ.get("MLAB_THREADS")
if _n:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _n)
