"""nlhelm: dual variational solver for the sign-changing nonlinear Helmholtz equation."""

__version__ = "0.1.0"
