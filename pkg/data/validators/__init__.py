from .manifest_validator import ManifestValidator

__all__ = ['ManifestValidator']
