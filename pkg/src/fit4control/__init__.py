"""fit4control: desk certification and Galerkin simulation toolkit for
bilinear Schrodinger control systems i d(psi)/dt = (-Laplacian + V + uW) psi.
"""

__version__ = "0.1.0"
