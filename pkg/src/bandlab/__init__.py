"""bandlab: a numerical laboratory for block random band matrices."""
from .lattice import TorusGeometry, dist_block, dist_site, periodic_rep
from .model import BandMatrix, VarianceProfile, brownian_increment, build_variance, sample_h
from .spectral import SpectralFlowState, m_sc, m_t, resolve, target_to_flow

__version__ = "0.1.0"
