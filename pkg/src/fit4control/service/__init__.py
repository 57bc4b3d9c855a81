"""HTTP service package: request models in ``models``, app factory in ``app``.

Import ``create_app`` from ``fit4control.service.app``; this module stays
import-light because the pipeline depends on the request models.
"""
