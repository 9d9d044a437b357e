"""
Data manager for tables, golden values and density files under data/
"""

import csv
import json
import os
import logging
from typing import Any, Dict, List, Sequence

import yaml

logger = logging.getLogger(__name__)


class DataManager:
    """Manages the flat-file artifacts of the toolkit"""

    def __init__(self, data_dir: str = 'data'):
        self.data_dir = data_dir
        self.golden_file = os.path.join(self.data_dir, 'golden.yaml')
        self.densities_dir = os.path.join(self.data_dir, 'densities')
        self.tables_dir = os.path.join(self.data_dir, 'tables')

    def ensure_data_directory(self, path: str = None):
        """Ensure a directory exists (the data directory by default)"""
        path = path or self.data_dir
        if not os.path.exists(path):
            os.makedirs(path)
            logger.info(f"Created data directory: {path}")

    def _ensure_parent(self, file_path: str):
        parent = os.path.dirname(file_path)
        if parent:
            self.ensure_data_directory(parent)

    def save_json_file(self, file_path: str, data: Any):
        """Save data to JSON file; I/O errors propagate to the caller"""
        self._ensure_parent(file_path)
        with open(file_path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
            f.write('\n')
        logger.info(f"Wrote {file_path}")

    def save_text_file(self, file_path: str, text: str):
        self._ensure_parent(file_path)
        with open(file_path, 'w', encoding='utf-8') as f:
            f.write(text if text.endswith('\n') else text + '\n')
        logger.info(f"Wrote {file_path}")

    def save_csv_table(self, file_path: str, header: Sequence[str], columns: Sequence[str],
                       rows: List[Dict[str, Any]]):
        """Write `# ` comment lines, a column row, then rows in the given order"""
        self._ensure_parent(file_path)
        with open(file_path, 'w', encoding='utf-8', newline='') as f:
            for line in header:
                f.write(f"# {line}\n")
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(columns)
            for row in rows:
                writer.writerow([row.get(column, '') for column in columns])
        logger.info(f"Wrote {len(rows)} rows to {file_path}")

    def load_csv_table(self, file_path: str) -> List[Dict[str, str]]:
        """Read a table written by save_csv_table, skipping comment lines"""
        with open(file_path, 'r', encoding='utf-8', newline='') as f:
            lines = [line for line in f if not line.startswith('#')]
        return list(csv.DictReader(lines))

    def load_golden(self, file_path: str = None) -> Dict:
        """Golden values: a mapping of entry name -> {value, source, ...}"""
        file_path = file_path or self.golden_file
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except Exception as e:
            logger.error(f"Error loading {file_path}: {e}")
            raise
        missing = [name for name, entry in data.items() if not isinstance(entry, dict) or 'source' not in entry]
        if missing:
            raise ValueError(f"Golden entries without a source: {missing}")
        return data

    def read_density_file(self, file_path: str) -> List[str]:
        """Lines of a density file, for quantization.load_density"""
        with open(file_path, 'r', encoding='utf-8') as f:
            return f.read().splitlines()

    def list_density_files(self) -> List[str]:
        if not os.path.isdir(self.densities_dir):
            return []
        return sorted(os.path.join(self.densities_dir, name)
                      for name in os.listdir(self.densities_dir) if name.endswith('.txt'))
