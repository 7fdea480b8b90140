"""pfdamp: pseudo-fermion algebra and damped quantum time evolution.

Dense complex linear algebra for small matrices, pseudo-fermion operator
families with their biorthogonal bases and metric operators, Schroedinger
and Heisenberg evolution under non-self-adjoint Hamiltonians, and the
built-in damping scenarios exposed through the ``pfdamp`` command line tool.

All public functions are pure (no global state); values may be shared
read-only across threads.
"""

from . import linalg, matfile, pseudofermion, dynamics, scenarios

__version__ = "0.1.0"

__all__ = ["linalg", "matfile", "pseudofermion", "dynamics", "scenarios", "__version__"]
