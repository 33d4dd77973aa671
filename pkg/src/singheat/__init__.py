"""singheat: numerical laboratory for singular radial solutions of
u_t = Laplace(u) + |u|^alpha u.

Submodules
----------
params       exponents and constants derived from (N, alpha)
ode          adaptive second-order ODE integration with events
stationary   radial stationary states and their classification
selfsimilar  singular self-similar profiles by stabilized shooting
pde          radial IMEX solver for the perturbation equation and the
             inverse-square-potential linear flow
verify       the acceptance suites run by `singheat verify`
cli          command-line interface
"""

from .params import Params, Regime, characteristic_roots, derive

__all__ = ["Params", "Regime", "derive", "characteristic_roots"]
__version__ = "0.1.0"
