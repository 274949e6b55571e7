"""Chase and ORBGRAND decoding of BCH(255,239,2) with input-distribution-aware parallelism control."""

__version__ = "0.1.0"
