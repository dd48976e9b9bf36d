"""
A wrapping module for the default configuration,
which reads config.json shipped with the package
and transfers it to the pipeline as a dict
"""


import json
from importlib.resources import files


config = json.loads(files(__package__).joinpath("config.json").read_text(encoding="utf-8"))
