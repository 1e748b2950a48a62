"""Multi-generator GAN training with hinge-coupled generator losses."""

from .losses import CouplingGraph, LossConfig, discriminator_loss, generator_loss
from .synthdata import CurveBand, Quadratic
from .trainer import ExperimentSpec, LossTrace, build_variant, train

__all__ = [
    "CouplingGraph", "CurveBand", "ExperimentSpec", "LossConfig", "LossTrace", "Quadratic",
    "build_variant", "discriminator_loss", "generator_loss", "train",
]
__version__ = "0.1.0"
