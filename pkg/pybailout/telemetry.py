from opentelemetry import trace, metrics

from .config import Config

tracer = trace.get_tracer(__name__)
meter = metrics.get_meter(__name__)

clearing_counter = meter.create_counter(
    name="clearings",
    description="The number of clearing computations (batch columns included)",
    unit="1"
)

lp_counter = meter.create_counter(
    name="lp_solves",
    description="The number of LP solves by status",
    unit="1"
)

lp_duration_histogram = meter.create_histogram(
    name="lp_duration",
    description="The duration of LP solves",
    unit="seconds"
)

cell_duration_histogram = meter.create_histogram(
    name="cell_duration",
    description="The duration of experiment cells",
    unit="seconds"
)

_configured = False


def setup_telemetry(service_name: str = "pybailout") -> bool:
    """Install OTLP exporters when an endpoint is configured."""
    global _configured
    if _configured or not Config.OTLP_ENDPOINT:
        return _configured

    from opentelemetry.exporter.otlp.proto.grpc.metric_exporter import OTLPMetricExporter
    from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
    from opentelemetry.sdk.metrics import MeterProvider
    from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader
    from opentelemetry.sdk.resources import SERVICE_NAME, Resource
    from opentelemetry.sdk.trace import TracerProvider
    from opentelemetry.sdk.trace.export import BatchSpanProcessor

    resource = Resource(attributes={SERVICE_NAME: service_name})

    trace_provider = TracerProvider(resource=resource)
    trace_provider.add_span_processor(BatchSpanProcessor(OTLPSpanExporter(endpoint=Config.OTLP_ENDPOINT)))
    trace.set_tracer_provider(trace_provider)

    metric_reader = PeriodicExportingMetricReader(OTLPMetricExporter(endpoint=Config.OTLP_ENDPOINT))
    metrics.set_meter_provider(MeterProvider(resource=resource, metric_readers=[metric_reader]))

    _configured = True
    return _configured
