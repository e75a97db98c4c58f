__version__ = "1.0.0"

from .spectral.spectral import SpectralGrid
from .spectral.components.field import RealField
from .geometry.geometry import KahlerBackground, PotentialState, assembleMetric
from .geometry.components.metric import MetricData
from .functionals.components.report import EnergyReport
from .spectrum.spectrum import EigenResult, firstEigenvalue, laplacianLambda1, evaluateConstants
from .spectrum.components.constants import ConstantsReport
from .flow.flow import FlowIntegrator, adaptiveRun, flowChecks, step
from .flow.components.config import FlowConfig
from .flow.components.trace import FlowTrace, TraceRecord
from .flow.components.checks import CheckReport, CheckStatus, FlowType, classifyType
from .verify.verify import VerificationSuite
from .verify.components.fit import DecayFit, fitDecay
from .verify.components.manifest import RunManifest
from .util.errors import CalabiFlowError, ConfigError, PositivityViolation, StepCollapse, NumericalBreakdown

__all__ = [
    "SpectralGrid",
    "RealField",
    "KahlerBackground",
    "PotentialState",
    "assembleMetric",
    "MetricData",
    "EnergyReport",
    "EigenResult",
    "firstEigenvalue",
    "laplacianLambda1",
    "evaluateConstants",
    "ConstantsReport",
    "FlowIntegrator",
    "adaptiveRun",
    "flowChecks",
    "step",
    "FlowConfig",
    "FlowTrace",
    "TraceRecord",
    "CheckReport",
    "CheckStatus",
    "FlowType",
    "classifyType",
    "VerificationSuite",
    "DecayFit",
    "fitDecay",
    "RunManifest",
    "CalabiFlowError",
    "ConfigError",
    "PositivityViolation",
    "StepCollapse",
    "NumericalBreakdown",
]
