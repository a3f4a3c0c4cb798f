"""Numerical verification of projectively flat general (alpha, beta)-metrics of constant flag curvature."""
from .errors import (BranchUndefined, DegenerateFlag, DomainViolation, FinslerLabError, NonFiniteValue,
                     NoRealRoot, NotProjectivelyFlat, QuadratureFailure, SingularDirection, SingularMetric,
                     UnsupportedSignature)
from .diffengine import DiffConfig, Jet, Jet2, jet2, partial3
from .riemann import AlphaTensors, BetaData, ProjectiveChart, alpha_eval, alpha_riemann, alpha_tensors, beta_data, beta_eval
from .phisolver import PhiFamily, PhiJet, eval_phi, phi_jet
from .finsler import (CurvatureFit, GeneralABMetric, SprayTerms, constant_K_fit, flag_curvature, fundamental_tensor,
                      metric_eval, projective_K, psi_K, riemann_tensor, spray_direct, spray_formula)
from .deform import DeformedPair, deform_nonzero, deform_zero, phi_transfer
from .catalog import CatalogEntry, catalog_list, load_catalog
from .runner import VerificationReport, deform_check, pde_scan, verify

__version__ = "0.1.0"
