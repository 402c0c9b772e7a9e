"""Quaternion sliding-mode control of a quadrotor: plant, controllers, benchmarks and experiment harness."""

__version__ = "0.1.0"
