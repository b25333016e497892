"""Allow running spikebayes as `python -m spikebayes`."""

from spikebayes.cli import main

main()
