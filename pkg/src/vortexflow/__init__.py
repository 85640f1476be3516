"""Gradient flow of the moment-map functional for abelian vortices on flat grids."""

import os

# VORTEXFLOW_THREADS caps BLAS worker threads; it only takes effect when this
# package is imported before numpy, as the command-line entry point does.
_threads = os.environ.get("VORTEXFLOW_THREADS", "1")
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, _threads)
