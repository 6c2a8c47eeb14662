#!/usr/bin/env python3
"""
Persist joint spectral decompositions of two-dimensional nets.

Each file is JSON with a format version, the content hash of the model
(grids and caps of both factors) and a SHA-256 checksum of its payload.
A file whose hash does not match the requested model is stale and gets
recomputed; a file whose checksum does not match its content is corrupt
and is reported.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from fractions import Fraction

from errors import CacheChecksumError, StaleCacheError
from fock_core import FockSpace
from spacetime_net import JointEigenspace, TwoDNet, build_two_d_net, joint_spectrum

logger = logging.getLogger(__name__)

CACHE_VERSION = 1


def _model_block(space: FockSpace) -> dict:
    return {
        "spacing": str(Fraction(str(space.grid.spacing))),
        "count": space.grid.count,
        "per_mode_cap": space.per_mode_cap,
        "energy_cap": None if math.isinf(space.energy_cap) else space.energy_cap,
    }


def _canonical(payload) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def spectral_key(net1: FockSpace, net2: FockSpace) -> str:
    """Content hash of (grids, caps) of both factors."""
    model = {"version": CACHE_VERSION, "net1": _model_block(net1), "net2": _model_block(net2)}
    return hashlib.sha256(_canonical(model)).hexdigest()


def cache_path(key: str, cache_dir: str = "cache") -> str:
    return os.path.join(cache_dir, f"spectrum_{key[:16]}.json")


def _encode(spectrum) -> list:
    return [
        {
            "key": [str(component) for component in space.key],
            "energy": space.energy,
            "momentum": space.momentum,
            "indices": list(space.indices),
        }
        for space in spectrum
    ]


def _decode(rows) -> tuple:
    return tuple(
        JointEigenspace(
            key=tuple(Fraction(component) for component in row["key"]),
            energy=row["energy"],
            momentum=row["momentum"],
            indices=tuple(row["indices"]),
        )
        for row in rows
    )


def cache_spectrum(net: TwoDNet, cache_dir: str = "cache") -> str:
    """
    Write the joint spectrum of net to the cache.

    Returns:
        str: path of the written file
    """
    key = spectral_key(net.net1, net.net2)
    payload = {
        "version": CACHE_VERSION,
        "hash": key,
        "model": {"net1": _model_block(net.net1), "net2": _model_block(net.net2)},
        "spectrum": _encode(net.joint_spectrum),
    }
    document = dict(payload, checksum=hashlib.sha256(_canonical(payload)).hexdigest())

    os.makedirs(cache_dir, exist_ok=True)
    path = cache_path(key, cache_dir)
    with open(path, "w") as f:
        json.dump(document, f, indent=1, sort_keys=True)
    logger.info("Cached spectrum %s (%d eigenspaces) -> %s", key[:12], len(net.joint_spectrum), path)
    return path


def load_spectrum(key: str, cache_dir: str = "cache") -> tuple:
    """
    Load a cached joint spectrum by model hash.

    Raises:
        FileNotFoundError: nothing cached under this hash
        CacheChecksumError: file content does not match its checksum
        StaleCacheError: file belongs to another model or cache version
    """
    path = cache_path(key, cache_dir)
    with open(path, "rb") as f:
        raw = f.read()
    try:
        document = json.loads(raw.decode("utf-8"))
        checksum = document.pop("checksum")
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, AttributeError) as exc:
        raise CacheChecksumError(f"{path}: unreadable cache file ({exc})") from exc

    if hashlib.sha256(_canonical(document)).hexdigest() != checksum:
        raise CacheChecksumError(f"{path}: checksum mismatch")
    if document.get("version") != CACHE_VERSION or document.get("hash") != key:
        raise StaleCacheError(f"{path}: cached hash {str(document.get('hash'))[:12]} != {key[:12]}")
    return _decode(document["spectrum"])


def cached_spectrum(net1: FockSpace, net2: FockSpace, cache_dir: str = "cache") -> tuple:
    """
    Joint spectrum of net1 x net2, served from the cache when valid.

    Stale entries are recomputed and rewritten, never reused; corrupt
    entries raise CacheChecksumError.
    """
    key = spectral_key(net1, net2)
    try:
        spectrum = load_spectrum(key, cache_dir)
        logger.debug("Spectrum cache hit %s", key[:12])
        return spectrum
    except FileNotFoundError:
        logger.debug("Spectrum cache miss %s", key[:12])
    except StaleCacheError as exc:
        logger.warning("Stale spectrum cache, recomputing: %s", exc)

    spectrum = joint_spectrum(net1, net2)
    cache_spectrum(build_two_d_net(net1, net2, max_dim=net1.dim * net2.dim, spectrum=spectrum), cache_dir)
    return spectrum
