"""Bundled example models."""
from __future__ import annotations

from importlib import resources

from .formats import parse_es, parse_net, parse_tsi
from .models import es_to_tsi, net_to_tsi


def fixture_text(name: str) -> str:
    return resources.files("tflkit").joinpath("fixtures", name).read_text()


def fixture_path(name: str):
    return resources.files("tflkit").joinpath("fixtures", name)


def load_fixture(name: str):
    text = fixture_text(name)
    if name.endswith(".tsi"):
        return parse_tsi(text, name)
    if name.endswith(".net"):
        return parse_net(text, name)
    if name.endswith(".es"):
        return parse_es(text, name)
    if name.endswith(".ccs"):
        from .ccs import parse_ccs
        return parse_ccs(text, name)
    raise ValueError(name)


def fixture_tsi(name: str):
    obj = load_fixture(name)
    if name.endswith(".net"):
        return net_to_tsi(obj)
    if name.endswith(".es"):
        return es_to_tsi(obj)
    return obj


def fixture_names():
    return sorted(p.name for p in resources.files("tflkit").joinpath("fixtures").iterdir()
                  if p.name.split(".")[-1] in ("tsi", "net", "es", "ccs"))
