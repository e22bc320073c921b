"""Optional adapter hosting a real depth-conditioned renderer behind the b2w wire protocol."""

from .config import AdapterConfig, load_config
from .server import create_adapter_app, depth_to_condition, serve_adapter

__version__ = "0.1.0"
