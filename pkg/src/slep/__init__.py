"""Sturm-Liouville problems with an eigenparameter-dependent boundary condition."""
