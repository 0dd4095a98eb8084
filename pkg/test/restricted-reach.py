#!/usr/bin/env python3
import sys
import os
import logging

# Let me import cvmdi from one directory up
sys.path.append(os.path.dirname(os.path.dirname(os.path.realpath(__file__))))
import cvmdi.commands
import cvmdi.config

logging.basicConfig(
    level=logging.INFO, format="%(levelname)s:%(name)s:%(message)s"
)

# Realistic restricted-eavesdropping sweep, both attack models
for scenario in ("restricted_collective", "restricted_individual"):
    config = cvmdi.config.getPresetConfig("realistic-restricted")
    config["scenario"] = scenario
    config["distances_km"] = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 55.0, 60.0, 70.0]
    print("# " + scenario)
    cvmdi.commands.cmd_sweep(config, cvmdi.config.resolveThreads(config)).write("", "csv")

logging.info("Finished")
