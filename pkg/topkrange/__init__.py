version_info = (0, 1, 0, "dev1")
__version__ = ".".join(map(str, version_info))

try:
    from topkrange import config
    from topkrange import disk
    from topkrange import errors
    from topkrange import topk

    EmConfig = disk.EmConfig
    Disk = disk.Disk

    use_config = config.use_config
    get_config = config.get_config

    TopkRange = topk.TopkRange
    FacadeConfig = topk.FacadeConfig

    TopkError = errors.TopkError
    UsageError = errors.UsageError
    AuditError = errors.AuditError
except ImportError:
    # lets setup.py read the version without numpy installed
    import traceback
    traceback.print_exc()
