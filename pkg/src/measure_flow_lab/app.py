"""Application wiring: named fields, functionals, presets and initial laws."""

from dataclasses import dataclass

import numpy as np

from measure_flow_lab.core.interfaces import (
    IExtendedFunctional,
    IInitialLaw,
    IMeasureFunctional,
    IOuterField,
    IPairField,
    IScalarField,
    ITimeField,
)
from measure_flow_lab.core.models import CoefficientModel
from measure_flow_lab.core.registry import Registry
from measure_flow_lab.services import fields, process
from measure_flow_lab.services.functional import (
    ConstantFunctional,
    MeanSquared,
    lift,
    make_bilinear,
    make_composite,
    make_convolution,
    make_linear,
    make_quadratic,
    second_moment,
)
from measure_flow_lab.utils.config import InitSpec, ModelSpec


@dataclass
class Catalog:
    """Every registry the runner resolves names against."""

    scalar_fields: Registry[IScalarField]
    pair_fields: Registry[IPairField]
    outer_fields: Registry[IOuterField]
    time_fields: Registry[ITimeField]
    functionals: Registry[IMeasureFunctional]
    extended: Registry[IExtendedFunctional]
    presets: Registry[CoefficientModel]
    init_laws: Registry[IInitialLaw]

    def functional(self, spec: str, dim: int) -> IMeasureFunctional:
        return self.functionals.resolve(spec, dim=dim)

    def extended_functional(self, spec: str, dim: int) -> IExtendedFunctional:
        return self.extended.resolve(spec, dim=dim)

    def time_field(self, spec: str) -> ITimeField:
        return self.time_fields.resolve(spec)

    def model(self, spec: ModelSpec) -> CoefficientModel:
        return self.presets.create(spec.preset, spec=spec)

    def init_law(self, spec: InitSpec, dim: int) -> IInitialLaw:
        return self.init_laws.create(spec.kind, spec=spec, dim=dim)


def _drift(spec: ModelSpec) -> np.ndarray:
    return np.asarray(spec.drift, dtype=float) if spec.drift else np.zeros(spec.dim)


def _location(spec: InitSpec, dim: int) -> tuple[float, ...]:
    return tuple(float(v) for v in spec.location) if spec.location else (0.0,) * dim


def _register_fields(catalog: Catalog) -> None:
    scalar = catalog.scalar_fields
    scalar.register("square_norm", lambda: fields.SquareNorm(), "|x|^2")
    scalar.register("coordinate", lambda index="0": fields.Coordinate(index=int(index)), "x_index")
    scalar.register(
        "affine",
        lambda slope="1", offset="0": fields.Affine(slope=float(slope), offset=float(offset)),
        "slope * sum(x) + offset",
    )
    scalar.register("gaussian", lambda scale="1": fields.GaussianBump(scale=float(scale)), "exp(-|x|^2 / 2 scale^2)")
    scalar.register("cosine", lambda frequency="1": fields.Cosine(frequency=float(frequency)), "cos(frequency * sum(x))")
    scalar.register("constant", lambda level="0": fields.Constant(level=float(level)), "level")

    pair = catalog.pair_fields
    pair.register("dot", lambda: fields.DotProduct(), "x . y")
    pair.register("gaussian_pair", lambda rate="1": fields.GaussianPair(rate=float(rate)), "exp(-rate (|x|^2 + |y|^2))")
    pair.register("gaussian_kernel", lambda scale="1": fields.GaussianKernel(scale=float(scale)), "exp(-|x - y|^2 / 2 scale^2)")
    pair.register("mixed", lambda: fields.MixedPolynomial(), "x_1 y_1^2")

    outer = catalog.outer_fields
    outer.register("identity_y", lambda: fields.IdentityY(), "F(x, y) = y")
    outer.register("square_y", lambda: fields.SquareY(), "F(x, y) = y^2")
    outer.register("shift_first", lambda: fields.ShiftFirstCoordinate(), "F(x, y) = x_1 + y")
    outer.register("product_first", lambda: fields.ProductFirstCoordinate(), "F(x, y) = x_1 y")

    timed = catalog.time_fields
    timed.register("time_only", lambda: fields.TimeOnly(), "g(t, x) = t")
    timed.register("static", lambda g="square_norm": fields.StaticField(scalar.resolve(g)), "g(t, x) = g(x)")
    timed.register("time_product", lambda g="square_norm": fields.TimeProduct(scalar.resolve(g)), "g(t, x) = t g(x)")
    timed.register("square_norm", lambda: fields.StaticField(fields.SquareNorm()), "g(t, x) = |x|^2")


def _register_functionals(catalog: Catalog) -> None:
    scalar, pair, outer = catalog.scalar_fields, catalog.pair_fields, catalog.outer_fields

    measure = catalog.functionals
    measure.register("second_moment", lambda dim: second_moment(dim), "int |v|^2 dmu")
    measure.register("mean_squared", lambda dim: MeanSquared(dim), "|int v dmu|^2")
    measure.register("constant", lambda dim, value="0": ConstantFunctional(dim, float(value)), "constant value")
    measure.register("linear", lambda dim, g="square_norm": make_linear(scalar.resolve(g), dim), "int g dmu; g a scalar field id")
    measure.register(
        "quadratic", lambda dim, g="gaussian_pair": make_quadratic(pair.resolve(g), dim), "int int g dmu dmu; g a pair field id"
    )
    measure.register(
        "convolution", lambda dim, f="gaussian": make_convolution(scalar.resolve(f), dim), "int int f(x - y) dmu dmu; f a scalar field id"
    )

    extended = catalog.extended
    extended.register("bilinear", lambda dim, g="dot": make_bilinear(pair.resolve(g), dim), "int g(x, y) dmu(y); g a pair field id")
    extended.register(
        "composite",
        lambda dim, F="identity_y", g="square_norm": make_composite(outer.resolve(F), scalar.resolve(g), dim),
        "F(x, int g dmu); F an outer field id, g a scalar field id",
    )
    extended.register(
        "lifted", lambda dim, F="second_moment": lift(measure.resolve(F, dim=dim)), "u(mu) of a measure functional id"
    )


def _register_presets(catalog: Catalog) -> None:
    presets = catalog.presets
    presets.register(
        "brownian",
        lambda spec: process.brownian(spec.dim, spec.noise_dim, spec.scale, spec.bound, spec.ellipticity),
        "b = 0, sigma = scale [I | 0]",
    )
    presets.register(
        "constant_drift",
        lambda spec: process.constant_drift(_drift(spec), spec.noise_dim, spec.scale, spec.bound, spec.ellipticity),
        "b = drift, sigma = scale [I | 0]",
    )
    presets.register(
        "rotation",
        lambda spec: process.rotation(spec.angle, spec.scale, spec.bound, spec.ellipticity),
        "b = 0, sigma = scale R(angle) in two dimensions",
    )
    presets.register(
        "oscillating",
        lambda spec: process.oscillating(_drift(spec), spec.scale, spec.epsilon, spec.bound, spec.ellipticity),
        "b = drift sin x, sigma = scale diag(1 + epsilon cos x)",
    )
    presets.register(
        "randomized",
        lambda spec: process.randomized(_drift(spec), spec.scale, spec.bound, spec.ellipticity),
        "b = drift (2U - 1) with a per-path uniform U",
    )
    presets.register(
        "degenerate",
        lambda spec: process.degenerate(spec.dim, spec.bound or 1.0, spec.ellipticity or 1.0),
        "sigma = 0; fails ellipticity",
    )

    laws = catalog.init_laws
    laws.register("point", lambda spec, dim: process.PointMassLaw(_location(spec, dim)), "point mass at location")
    laws.register(
        "gaussian", lambda spec, dim: process.GaussianLaw(_location(spec, dim), spec.scale), "N(location, scale^2 I)"
    )
    laws.register(
        "ball", lambda spec, dim: process.UniformBallLaw(_location(spec, dim), spec.radius), "uniform on B(location, radius)"
    )


def create_catalog() -> Catalog:
    """Create and populate every registry."""
    catalog = Catalog(
        scalar_fields=Registry("scalar field"),
        pair_fields=Registry("pair field"),
        outer_fields=Registry("outer field"),
        time_fields=Registry("time field"),
        functionals=Registry("functional"),
        extended=Registry("extended functional"),
        presets=Registry("coefficient preset"),
        init_laws=Registry("initial law"),
    )
    _register_fields(catalog)
    _register_functionals(catalog)
    _register_presets(catalog)
    return catalog
