"""Tests for the named factory registry and the application catalog."""

import pytest

from measure_flow_lab.core.errors import InvalidArgumentError
from measure_flow_lab.core.registry import Registry, UnknownNameError, parse_spec
from measure_flow_lab.services.functional import BilinearExtended, ConstantFunctional, QuadraticFunctional
from measure_flow_lab.utils.config import InitSpec, ModelSpec


class TestParseSpec:
    """Tests for parse_spec."""

    def test_bare_name(self):
        """Test a name without parameters."""
        assert parse_spec("second_moment") == ("second_moment", {})

    def test_parameters(self):
        """Test name with comma-separated parameters."""
        assert parse_spec("composite:F=square_y, g=gaussian") == ("composite", {"F": "square_y", "g": "gaussian"})

    @pytest.mark.parametrize("spec", ["", ":g=dot", "quadratic:g", "quadratic:=dot"])
    def test_malformed(self, spec):
        """Test that malformed specs are rejected."""
        with pytest.raises(InvalidArgumentError):
            parse_spec(spec)


class TestRegistry:
    """Tests for Registry."""

    @pytest.fixture
    def registry(self):
        """Registry with one parameterized factory."""
        registry = Registry("thing")
        registry.register("scaled", lambda factor="1": 2 * float(factor), "twice the factor")
        return registry

    def test_resolve(self, registry):
        """Test building from a spec string."""
        assert registry.resolve("scaled:factor=3") == 6.0

    def test_resolve_passes_context(self):
        """Test that context keywords reach the factory."""
        registry = Registry("thing")
        registry.register("sized", lambda dim, extra="0": dim + int(extra))

        assert registry.resolve("sized:extra=2", dim=3) == 5

    def test_unknown_name(self, registry):
        """Test that unknown names list the known ones."""
        with pytest.raises(UnknownNameError) as exc_info:
            registry.resolve("missing")

        assert "scaled" in str(exc_info.value)

    def test_bad_parameter(self, registry):
        """Test that unexpected parameters are reported."""
        with pytest.raises(InvalidArgumentError):
            registry.resolve("scaled:bogus=1")

    def test_introspection(self, registry):
        """Test names, descriptions and validity checks."""
        assert registry.names() == ["scaled"]
        assert registry.describe("scaled") == "twice the factor"
        assert registry.is_valid_spec("scaled:factor=2")
        assert not registry.is_valid_spec("other")
        assert not registry.is_valid_spec(":")

    def test_clear(self, registry):
        """Test that clear empties the registry."""
        registry.clear()

        assert registry.names() == []


class TestCatalog:
    """Tests for the populated catalog."""

    def test_documented_functionals_registered(self, catalog):
        """Test that every documented functional name resolves."""
        for name in ("second_moment", "mean_squared", "constant", "linear", "quadratic", "convolution"):
            assert catalog.functionals.is_registered(name)
        for name in ("bilinear", "composite", "lifted"):
            assert catalog.extended.is_registered(name)

    def test_quadratic_with_field(self, catalog):
        """Test resolving a quadratic functional with a pair field."""
        functional = catalog.functional("quadratic:g=gaussian_pair", 2)

        assert isinstance(functional, QuadraticFunctional)
        assert functional.dim == 2
        assert functional.metadata.hypothesis_certified

    def test_constant_value(self, catalog):
        """Test that string parameters are converted."""
        functional = catalog.functional("constant:value=2.5", 1)

        assert isinstance(functional, ConstantFunctional)
        assert functional.level == 2.5

    def test_extended_bilinear(self, catalog):
        """Test resolving the bilinear extended functional."""
        assert isinstance(catalog.extended_functional("bilinear:g=dot", 1), BilinearExtended)

    def test_unknown_nested_field(self, catalog):
        """Test that an unknown nested field id fails cleanly."""
        with pytest.raises(UnknownNameError):
            catalog.functional("quadratic:g=nope", 1)

    def test_model_presets(self, catalog):
        """Test building presets from model specs."""
        model = catalog.model(ModelSpec(preset="constant_drift", dim=2, drift=[0.5, -0.5]))

        assert model.dim == 2
        assert model.name == "constant_drift"
        assert catalog.model(ModelSpec(preset="rotation", dim=2, angle=0.3)).dim == 2
        assert catalog.model(ModelSpec(preset="randomized", dim=1, drift=[1.0])).aux_dim == 1

    def test_init_laws(self, catalog):
        """Test building initial laws with default and explicit locations."""
        point = catalog.init_law(InitSpec(kind="point"), 3)
        gaussian = catalog.init_law(InitSpec(kind="gaussian", location=[1.0], scale=2.0), 1)

        assert point.dim == 3
        assert gaussian.second_moment() == pytest.approx(5.0)

    def test_time_fields(self, catalog):
        """Test resolving time fields, including nested scalar ids."""
        assert catalog.time_field("time_product:g=gaussian").name == "time_times[gaussian]"
        assert catalog.time_field("square_norm").name == "static[square_norm]"
