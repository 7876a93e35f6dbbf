"""Deterministic simulator and verifier for a fixed-time null-space behavioral
control stack: collision avoidance and cooperative tracking behaviors merged
through null-space projection, driven by a distributed fixed-time leader
estimator and an adaptive sliding-mode tracking controller."""

__version__ = "0.1.0"
