import logging

import wong_zakai_lab
from ..errors import ModelError

log = logging.getLogger(__name__)


def list_models():
    """Names of the builtin models, in priority order."""
    return [cls.name for cls in wong_zakai_lab.get_model_classes()]


def find_model_class(name):
    """Look up the builtin model class called ``name``.

    Raises:
      ModelError: If no builtin model has that name.
    """
    for cls in wong_zakai_lab.get_model_classes():
        if cls.name == name:
            return cls
    raise ModelError("unknown model %r, expected one of %s" % (name, ", ".join(list_models())))


def builtin(name, params=None, x0=None):
    """Instantiate a builtin model.

    Args:
      name (str): The model's ``name``, e.g. ``"cubic"``.
      params (dict): Parameter overrides.
      x0 (sequence of float): Initial state.

    Returns:
      SdeModel
    """
    model = find_model_class(name)(x0=x0, **(params or {}))
    log.debug("Built model %r", model)
    return model


def from_document(document):
    """Instantiate a model from ``{"model": name, "params": {...}, "x0": [...]}``."""
    if "model" not in document:
        raise ModelError("model document has no 'model' key")
    return builtin(document["model"], document.get("params"), document.get("x0"))
