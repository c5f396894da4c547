"""Density-equalising cartograms and smooth pycnophylactic density rasters."""

from pycnoflow._core import (
    Cartogram,
    RegionMap,
    hybrid_raster,
    load_regions,
    mean_density,
    plateau_raster,
    pycno_errors,
    pycno_raster,
    roughness,
    run_cartogram,
    tobler_raster,
    __version__,
)

__all__ = [
    "Cartogram",
    "RegionMap",
    "hybrid_raster",
    "load_regions",
    "mean_density",
    "plateau_raster",
    "pycno_errors",
    "pycno_raster",
    "roughness",
    "run_cartogram",
    "tobler_raster",
    "__version__",
]
