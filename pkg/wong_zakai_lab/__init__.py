import types

__version__ = "0.1.0"


def get_model_classes():
    """Builtin model classes, sorted by their ``priority`` attribute."""
    from . import models

    module_type = types.ModuleType
    classes = [
        m.model_class
        for m in models.__dict__.values()
        if isinstance(m, module_type) and hasattr(m, "model_class")
    ]
    return sorted(classes, key=lambda c: c.priority)
