"""Connected-chain spatially coupled LDPC ensembles designed jointly with BICM bit mappings."""

__version__ = "0.1.0"
