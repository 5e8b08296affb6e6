"""Figure scripts for qcollapse simulation output.

These scripts consume only the documented CSV file formats written by
the qcollapse command-line harness (never its internal state), so the
boundary between simulation and plotting is a file format.  Re-running a
script on unchanged inputs reproduces the output image byte for byte.
"""

__version__ = "0.1.0"
