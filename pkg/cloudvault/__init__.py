"""CloudVault: AES + RSA client-side encrypted cloud storage."""

__version__ = "1.0.0"
