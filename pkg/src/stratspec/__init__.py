"""Interaction residues of stratified block-operator systems.

A system is a block matrix whose diagonal blocks (strata) are coupled by
off-diagonal interface blocks.  The package computes which global
eigenvalues are not explained by the strata alone, attributes them to
interfaces, and analyses their Jordan structure, parameter families and
behaviour under coupling sweeps.
"""

__version__ = "0.1.0"
