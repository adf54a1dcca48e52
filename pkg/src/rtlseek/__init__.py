"""Diversity-oriented RL machinery for Verilog generation: parsing, structural
equivalence, simulation, rewards, GRPO and evaluation metrics."""

__version__ = "0.1.0"
