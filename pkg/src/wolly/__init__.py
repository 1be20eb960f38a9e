"""Wolly: a verifiable educational-robot control stack.

Subpackages cover the shared command vocabulary (:mod:`wolly.model`), the
block compiler (:mod:`wolly.blocks`), the realtime command bus
(:mod:`wolly.bus`), the virtual robot (:mod:`wolly.robot`), the emotion
service (:mod:`wolly.emotion`), the identity registry
(:mod:`wolly.identity`), the knowledge base (:mod:`wolly.kb`), and the
dialogue engine (:mod:`wolly.dialogue`).
"""

__version__ = "0.1.0"
