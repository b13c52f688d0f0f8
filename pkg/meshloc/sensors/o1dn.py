from meshloc.sensors.model import SensorModel, range_options, normalize_directions


class o1dn(SensorModel):
    """Arbitrary ray directions sharing one origin."""
    model_options = [
        {
            'option': 'origin',
            'type': 'vector',
            'label': 'Ray origin',
            'default': [0.0, 0.0, 0.0]
        },
        {
            'option': 'directions',
            'type': 'vectors',
            'label': 'Ray directions',
            'default': None,
            'help': "Normalized when the model is built."
        },
    ] + range_options

    def validate(self):
        self.directions = normalize_directions(self.directions)

    def _compute_rays(self):
        return self.origin, self.directions


presets = {}
