"""Scan files: `index,range,valid` CSV and a JSON container with the model."""
import csv
import json
import os

import numpy as np

from meshloc import sensors
from meshloc.errors import MeshLocError, ScanMismatchError
from meshloc.sensors.model import Scan

CSV_HEADER = ['index', 'range', 'valid']


def write_scan_csv(scan, path):
    with open(path, 'w', newline='') as csv_file:
        writer = csv.writer(csv_file)
        writer.writerow(CSV_HEADER)
        for index, (value, valid) in enumerate(zip(scan.ranges, scan.valid)):
            writer.writerow([index, repr(float(value)) if valid else 'nan', int(valid)])


def read_scan_csv(path, model=None):
    """Read a CSV scan. With a `model`, ranges outside its bounds are invalid."""
    ranges = []
    valid = []
    with open(path, newline='') as csv_file:
        reader = csv.DictReader(csv_file)
        if reader.fieldnames != CSV_HEADER:
            raise ScanMismatchError("Scan CSV header must be %s" % ','.join(CSV_HEADER),
                                    reader.fieldnames)
        for line_number, row in enumerate(reader, start=2):
            try:
                if int(row['index']) != len(ranges):
                    raise ValueError("indices must count up from 0")
                ranges.append(float(row['range']))
                valid.append(bool(int(row['valid'])))
            except (TypeError, ValueError) as ex:
                raise ScanMismatchError("line %d: %s" % (line_number, ex), row)
    if model is None:
        return Scan(ranges, valid)
    return model.make_scan(np.where(valid, ranges, np.nan))


def write_scan_json(scan, path, model=None):
    data = {
        'model': model.to_dict() if model else None,
        'ranges': [float(value) if valid else None
                   for value, valid in zip(scan.ranges, scan.valid)],
    }
    with open(path, 'w') as json_file:
        json.dump(data, json_file, indent=2)


def read_scan_json(path, model=None):
    """Return the (model or None, scan) pair stored in a JSON scan file.

    Validity follows the range bounds of `model`, or of the stored model.
    """
    with open(path) as json_file:
        try:
            data = json.load(json_file)
        except ValueError as ex:
            raise ScanMismatchError("Invalid scan JSON in %s: %s" % (path, ex))
    if not isinstance(data, dict):
        raise ScanMismatchError("Scan JSON in %s must be an object" % path,
                                type(data).__name__)
    values = data.get('ranges', [])
    if not isinstance(values, list):
        raise ScanMismatchError("Scan ranges in %s must be a list" % path, values)
    stored_model = sensors.model_from_config(data['model']) if data.get('model') else None
    model = model or stored_model
    try:
        ranges = np.array([np.nan if value is None else value for value in values],
                          dtype=np.float64)
    except (TypeError, ValueError) as ex:
        raise ScanMismatchError("Invalid scan ranges in %s: %s" % (path, ex))
    scan = model.make_scan(ranges) if model else Scan(ranges)
    return stored_model, scan


def write_scan(scan, path, model=None):
    if os.path.splitext(path)[1].lower() == '.json':
        write_scan_json(scan, path, model)
    else:
        write_scan_csv(scan, path)


def read_scan(path, model=None):
    """Read a CSV or JSON scan, checked against `model` when given."""
    try:
        if os.path.splitext(path)[1].lower() == '.json':
            stored_model, scan = read_scan_json(path, model)
            model = model or stored_model
        else:
            scan = read_scan_csv(path, model)
    except OSError as ex:
        raise MeshLocError("Can't read scan %s: %s" % (path, ex.strerror), path)
    if model is not None:
        model.check_scan(scan)
    return scan
