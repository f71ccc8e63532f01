import hashlib
from dataclasses import dataclass
from typing import Optional

from .baselines import SsimConfig, psnr, ssim
from .errors import ParameterError
from .haarpsi import HaarPsiParams, haarpsi_score, preset as haarpsi_preset
from .imgio import GrayImage
from .wavelet import Padding

MEASURES = ("haarpsi", "psnr", "ssim")


@dataclass(frozen=True)
class MeasureSpec:
    """A measure id plus everything needed to reproduce its values"""
    name: str
    params: Optional[HaarPsiParams] = None
    ssim_config: SsimConfig = SsimConfig()
    peak: float = 255.0
    label: Optional[str] = None

    def compute(self, f1: GrayImage, f2: GrayImage) -> float:
        if self.name == "haarpsi":
            return haarpsi_score(f1, f2, self.params).score
        if self.name == "psnr":
            return psnr(f1, f2, self.peak)
        if self.name == "ssim":
            return ssim(f1, f2, self.ssim_config)
        raise ParameterError(f"unknown measure '{self.name}'")

    @property
    def display_name(self) -> str:
        return self.label or self.name

    def describe(self) -> str:
        if self.name == "haarpsi":
            return f"haarpsi {self.params.describe()}"
        if self.name == "psnr":
            return f"psnr peak={self.peak:g}"
        cfg = self.ssim_config
        return (f"ssim window={cfg.window_size} sigma={cfg.sigma:g} k1={cfg.k1:g} "
                f"k2={cfg.k2:g} peak={cfg.peak:g}")

    def param_hash(self) -> str:
        return hashlib.sha256(self.describe().encode("utf-8")).hexdigest()[:12]


def parse_measure(measure: str, preset: str = None, C: float = None, alpha: float = None,
                  subsample: bool = True, padding: str = "symmetric") -> MeasureSpec:
    """Resolve 'haarpsi', 'haarpsi-<preset>', 'psnr' or 'ssim' plus overrides"""
    name = measure.lower()
    if name in ("psnr", "ssim"):
        if preset or C is not None or alpha is not None:
            raise ParameterError(f"--preset/--C/--alpha apply to haarpsi only, not {name}")
        return MeasureSpec(name=name, label=name)

    if name.startswith("haarpsi-"):
        implied = name[len("haarpsi-"):]
        if preset and preset.lower() != implied:
            raise ParameterError(f"measure '{measure}' conflicts with --preset {preset}")
        preset = implied
    elif name != "haarpsi":
        raise ParameterError(f"unknown measure '{measure}' (known: {', '.join(MEASURES)}, haarpsi-<preset>)")

    if (C is None) != (alpha is None):
        raise ParameterError("--C and --alpha must be given together")
    try:
        pad = Padding(padding)
    except ValueError:
        raise ParameterError(f"padding must be symmetric or zero, got '{padding}'")

    params = haarpsi_preset(preset or "default")
    if C is not None:
        params = params.with_values(C, alpha)
    params = HaarPsiParams(C=params.C, alpha=params.alpha, subsample=subsample, padding=pad)
    return MeasureSpec(name="haarpsi", params=params, label=name)
