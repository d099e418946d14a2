# SATR package initializer
__all__ = ["errors", "atcore", "embedding", "pqtree", "spqr", "constraints", "acp", "realize",
           "untangle", "oracle", "hardness", "planted", "stats", "cli"]
