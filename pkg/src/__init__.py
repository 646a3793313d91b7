"""Stability analysis toolkit for the linearized gravity-gradient attitude model."""
