"""Sum-of-squares polynomial approximation of norms given by polar generators."""
from .approximant import (
    NormApproximant,
    build,
    eval_p,
    eval_r,
    expand_monomials,
    load,
    norm_bounds,
    save,
    sos_factor,
)
from .bodies import BodySpec, exact_norm, from_polar_vertices, make_l1, make_linf, make_lp_sampled
from .errors import ConvergenceError, DimensionCapError, DimensionOverflowError
from .mvee import Ellipsoid, inscribed_from_enclosing, mvee_general, mvee_symmetric
from .symtensor import SymVector, multi_indices, pairing, sym_dim, veronese
from .verify import VerificationReport, check_sandwich

__version__ = "0.1.0"
