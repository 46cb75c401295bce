"""
MPOC toolkit application.

Models, certifies and regularizes mathematical programs with orthogonality
type constraints, audits sparsity-constrained relaxations, and checks level
set topology on planar instances.
"""
