from .codec import decode_item, decode_tensor_map, encode_item, encode_tensor_map
from .program import (
    EXIT_CRASH,
    EXIT_OK,
    InProcessRun,
    MultiProcessHandle,
    NodeSpec,
    ProgramGraph,
    RunPlan,
    build_program,
    launch,
)
from .protocol import (
    MAGIC,
    VERSION,
    CallID,
    ProtocolError,
    Status,
    decode_message,
    encode_message,
    read_message,
    write_message,
)
from .services import (
    CallbackSink,
    RpcClient,
    RpcServer,
    RpcService,
    VariableSource,
    serve_metrics,
    serve_replay,
    serve_variables,
)

__all__ = [
    "CallID",
    "CallbackSink",
    "EXIT_CRASH",
    "EXIT_OK",
    "InProcessRun",
    "MAGIC",
    "MultiProcessHandle",
    "NodeSpec",
    "ProgramGraph",
    "ProtocolError",
    "RpcClient",
    "RpcServer",
    "RpcService",
    "RunPlan",
    "Status",
    "VERSION",
    "VariableSource",
    "build_program",
    "decode_item",
    "decode_message",
    "decode_tensor_map",
    "encode_item",
    "encode_message",
    "encode_tensor_map",
    "launch",
    "read_message",
    "serve_metrics",
    "serve_replay",
    "serve_variables",
    "write_message",
]
