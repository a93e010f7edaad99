"""Exception types shared across the toolkit."""


class SceneError(Exception):
    """Base class for all scene-toolkit errors."""


class ConfigSyntaxError(SceneError):
    """Input text is not a well-formed YAML document."""


class SchemaError(SceneError):
    """Document structure does not match the scene schema."""


class DomainError(SceneError):
    """A value violates a domain invariant (negative mass, bad quaternion, ...)."""


class TagError(SceneError):
    """Missing, unbalanced, or interleaved answer/reasoning tags."""


class LayoutError(SceneError):
    """Parameter vector and layout descriptor disagree."""


class ConfigError(SceneError):
    """Invalid scene configuration handed to the simulator."""


class DivergenceError(SceneError):
    """Simulation blew up (position magnitude beyond the sanity bound)."""


class ShapeError(SceneError):
    """Metric inputs have mismatched dimensions."""


class CompositionError(SceneError):
    """Parameter matching requires equal object-shape multisets."""


class MismatchError(SceneError):
    """Event references an object absent from the configuration."""
