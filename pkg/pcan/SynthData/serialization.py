# Reads and writes synthetic datasets on disk
#
# Copyright (c) 2026, pcan developers and contributors

"""On-disk layout of a dataset directory::

    <root>/<split>/scenes.jsonl          one JSON record per line
    <root>/<split>/arrays/<id>.image     PCN1 array, H x W x 3
    <root>/<split>/arrays/<id>.masks     PCN1 array, H x W x n_objects

A PCN1 array is the 4 magic bytes ``PCN1``, three little-endian uint32
(height, width, channels) and the row-major little-endian float32 payload.
"""

import json
import logging
import os
import struct

import numpy as np

from pcan.Geometry.box import Box
from pcan.SynthData import grammar
from pcan.SynthData.detector import PriorSample
from pcan.SynthData.scene import SceneObject, SceneRecord
from pcan.Util.exceptions import FormatError


__all__ = ['write_array', 'read_array', 'save_dataset', 'load_dataset']


logger = logging.getLogger(__name__)


_MAGIC = b'PCN1'
_HEADER = struct.Struct('<4sIII')


def write_array(array, path):
    """Write a 2-D or 3-D array in the PCN1 format."""
    array = np.asarray(array)
    if array.ndim == 2:
        array = array[:, :, None]
    if array.ndim != 3:
        raise FormatError(f"PCN1 stores 2-D or 3-D arrays, got shape {array.shape}")
    height, width, channels = array.shape
    with open(path, 'wb') as f:
        f.write(_HEADER.pack(_MAGIC, height, width, channels))
        f.write(np.ascontiguousarray(array, dtype='<f4').tobytes())


def read_array(path):
    """Read a PCN1 array as float32 of shape (H, W, C)."""
    with open(path, 'rb') as f:
        content = f.read()
    if len(content) < _HEADER.size:
        raise FormatError(f"{path}: file too short for a PCN1 header")
    magic, height, width, channels = _HEADER.unpack_from(content)
    if magic != _MAGIC:
        raise FormatError(f"{path}: bad magic bytes {magic!r}")
    expected = _HEADER.size + 4 * height * width * channels
    if len(content) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(content)}")
    data = np.frombuffer(content, dtype='<f4', offset=_HEADER.size)
    return data.reshape(height, width, channels).astype(np.float32)


def _description_to_dict(d):
    return {'shape': d.shape, 'color': d.color, 'size': d.size}


def _expression_to_dict(e):
    out = {'subject': _description_to_dict(e.subject), 'relation': e.relation,
           'anchor': None if e.anchor is None else _description_to_dict(e.anchor),
           'text': e.text()}
    return out


def _expression_from_dict(d):
    anchor = None if d['anchor'] is None else grammar.Description(**d['anchor'])
    return grammar.Expression(grammar.Description(**d['subject']), d['relation'], anchor)


def _record_to_dict(scene):
    return {
        'scene_id': scene.scene_id,
        'split': scene.split,
        'height': scene.height,
        'width': scene.width,
        'tokens': list(scene.tokens),
        'expression': _expression_to_dict(scene.expression),
        'target_index': scene.target_index,
        'objects': [{'shape': o.shape, 'color': o.color, 'size': o.size,
                     'box': [o.box.x1, o.box.y1, o.box.x2, o.box.y2]}
                    for o in scene.objects],
        'detections': [d.to_dict() for d in scene.detections],
        'all_detections': [d.to_dict() for d in scene.all_detections],
        'image': f"arrays/{scene.scene_id:06d}.image",
        'masks': f"arrays/{scene.scene_id:06d}.masks",
    }


def save_dataset(records, output_dir):
    """Write scenes grouped by split under `output_dir`.

    :return: dict split -> number of scenes written
    """
    counts = {}
    by_split = {}
    for scene in records:
        by_split.setdefault(scene.split, []).append(scene)
    for split, scenes in sorted(by_split.items()):
        split_dir = os.path.join(output_dir, split)
        os.makedirs(os.path.join(split_dir, 'arrays'), exist_ok=True)
        with open(os.path.join(split_dir, 'scenes.jsonl'), 'w') as f:
            for scene in scenes:
                d = _record_to_dict(scene)
                f.write(json.dumps(d, sort_keys=True) + '\n')
                write_array(scene.image, os.path.join(split_dir, d['image']))
                masks = np.stack([o.mask for o in scene.objects], axis=-1)
                write_array(masks, os.path.join(split_dir, d['masks']))
        counts[split] = len(scenes)
        logger.info("wrote %d %s scenes to %s", len(scenes), split, split_dir)
    return counts


def load_dataset(input_dir, split):
    """Read back the scenes of one split written by `save_dataset`.

    :return: list of SceneRecord in file order
    """
    split_dir = os.path.join(input_dir, split)
    path = os.path.join(split_dir, 'scenes.jsonl')
    if not os.path.isfile(path):
        raise FileNotFoundError(f"No '{split}' split found in {input_dir}")
    records = []
    with open(path, 'r') as f:
        for line in f:
            if not line.strip():
                continue
            d = json.loads(line)
            image = read_array(os.path.join(split_dir, d['image']))
            masks = read_array(os.path.join(split_dir, d['masks'])) > 0.5
            if image.shape[:2] != (d['height'], d['width']) or masks.shape[2] != len(d['objects']):
                raise FormatError(f"Scene {d['scene_id']}: arrays do not match the record")
            objects = tuple(SceneObject(o['shape'], o['color'], o['size'], Box(*o['box']), masks[:, :, i])
                            for i, o in enumerate(d['objects']))
            records.append(SceneRecord(
                scene_id=d['scene_id'], split=d['split'], image=image, objects=objects,
                expression=_expression_from_dict(d['expression']), tokens=tuple(d['tokens']),
                target_index=d['target_index'],
                detections=tuple(PriorSample.from_dict(p) for p in d['detections']),
                all_detections=tuple(PriorSample.from_dict(p) for p in d.get('all_detections', ()))))
    logger.info("loaded %d %s scenes from %s", len(records), split, split_dir)
    return records
