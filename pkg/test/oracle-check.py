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

POINTS = [
    {"tau_a": 0.9, "tau_b": 0.9},
    {"tau_a": 0.9, "tau_b": 0.95, "eps_a": 0.05, "eps_b": 0.05, "eta": 0.98},
    {"tau_a": 0.6, "tau_b": 0.6, "scenario": "restricted_collective"},
]

for (i, point) in enumerate(POINTS):
    config = cvmdi.config.LoadConfigFromDict(cvmdi.config.getDefaultConfig(), point)
    config["seed"] = i + 1
    cvmdi.commands.cmd_oracle(config, cvmdi.config.resolveThreads(config)).write("", "csv")

logging.info("Finished")
