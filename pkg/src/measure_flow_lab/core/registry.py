"""Named factory registry for built-in fields, functionals and presets."""

from typing import Callable, Generic, TypeVar

from measure_flow_lab.core.errors import InvalidArgumentError

T = TypeVar("T")


class UnknownNameError(InvalidArgumentError, KeyError):
    """Raised when a spec names nothing registered."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


def parse_spec(spec: str) -> tuple[str, dict[str, str]]:
    """Split ``name:key=value,key=value`` into the name and its parameters."""
    name, _, rest = spec.strip().partition(":")
    if not name:
        raise InvalidArgumentError(f"empty name in spec {spec!r}")
    params: dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep or not key.strip():
                raise InvalidArgumentError(f"malformed parameter {item!r} in spec {spec!r}")
            params[key.strip()] = value.strip()
    return name, params


class Registry(Generic[T]):
    """Maps names to factories; ``resolve`` builds a fresh instance per spec."""

    def __init__(self, kind: str) -> None:
        self._kind = kind
        self._factories: dict[str, Callable[..., T]] = {}
        self._descriptions: dict[str, str] = {}

    @property
    def kind(self) -> str:
        return self._kind

    def register(self, name: str, factory: Callable[..., T], description: str = "") -> None:
        """Register a factory; re-registering a name replaces it."""
        self._factories[name] = factory
        self._descriptions[name] = description

    def resolve(self, spec: str, **context) -> T:
        """Build the object described by ``spec``.

        ``context`` (for example ``dim``) is passed to the factory alongside the
        parameters parsed from the spec.
        """
        name, params = parse_spec(spec)
        return self.create(name, **context, **params)

    def create(self, name: str, **params) -> T:
        """Build ``name`` from already-typed keyword parameters."""
        if name not in self._factories:
            known = ", ".join(self.names()) or "none"
            raise UnknownNameError(f"no {self._kind} registered as {name!r} (known: {known})")
        try:
            return self._factories[name](**params)
        except TypeError as exc:
            raise InvalidArgumentError(f"bad parameters for {self._kind} {name!r}: {exc}") from exc

    def is_registered(self, name: str) -> bool:
        return name in self._factories

    def is_valid_spec(self, spec: str) -> bool:
        try:
            name, _ = parse_spec(spec)
        except InvalidArgumentError:
            return False
        return self.is_registered(name)

    def names(self) -> list[str]:
        return sorted(self._factories)

    def describe(self, name: str) -> str:
        return self._descriptions.get(name, "")

    def clear(self) -> None:
        self._factories.clear()
        self._descriptions.clear()
