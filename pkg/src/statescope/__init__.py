"""statescope: reason about black-box IoT device states from side channels.

Workflow: explore a device while recording power draw, network throughput,
and RF emanation spectra; window and featurize the traces; embed and
cluster the windows; reconcile clusters with human annotations through a
correlation matrix and collage step; then train a classifier and verify
live sessions step by step against the resulting state machine.
"""

__version__ = "0.1.0"
