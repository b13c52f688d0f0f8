"""Sensor model registry."""
from meshloc.errors import InvalidModel

__all__ = (
    # Rotating LiDARs
    "spherical",
    # Depth cameras
    "pinhole",
    # Free ray layouts
    "o1dn", "ondn",
)


def get_model_module(model_name):
    if model_name not in __all__:
        raise InvalidModel("Invalid sensor model '%s'" % model_name, model_name)
    return __import__('meshloc.sensors.%s' % model_name,
                      globals(), locals(), [model_name], 0)


def import_model(model_name):
    """Dynamically import a sensor model class."""
    return getattr(get_model_module(model_name), model_name)


def import_preset(model_name, preset_name):
    presets = get_model_module(model_name).presets
    if preset_name not in presets:
        raise InvalidModel("%s has no preset '%s'" % (model_name, preset_name),
                           sorted(presets))
    return presets[preset_name]


def model_from_config(config):
    """Build a model from a `model` name plus `params` or a `preset`.

    With a preset, `params` are passed to the preset function.
    """
    if not isinstance(config, dict) or 'model' not in config:
        raise InvalidModel("Sensor config needs a 'model' key", config)
    params = config.get('params') or {}
    if not isinstance(params, dict):
        raise InvalidModel("Sensor params must be a mapping", params)
    if config.get('preset'):
        factory = import_preset(config['model'], config['preset'])
    else:
        factory = import_model(config['model'])
    try:
        return factory(**params)
    except TypeError as ex:
        raise InvalidModel("Invalid parameters for %s: %s" % (config['model'], ex), params)
