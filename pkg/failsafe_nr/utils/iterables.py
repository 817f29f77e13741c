from typing import Any, Dict


def flatten_dict(dict_: Dict[str, Any], prefix: str = "", delimiter: str = "/", flatten_lists: bool = False) -> Dict[str, Any]:
    """
    Recursively flattens a nested dictionary into a single-level dictionary.

    Used to turn nested result records into flat CSV columns.

    Example:
        {"config": {"alpha": 0.05, "k_grid": [10, 20]}}
        -> {"config/alpha": 0.05, "config/k_grid": [10, 20]}
        with flatten_lists=True
        -> {"config/alpha": 0.05, "config/k_grid/0": 10, "config/k_grid/1": 20}
    """
    flattened = {}
    for key, value in dict_.items():
        if isinstance(value, dict):
            flattened.update(flatten_dict(value, prefix=f"{prefix}{key}{delimiter}", delimiter=delimiter, flatten_lists=flatten_lists))
        elif isinstance(value, list) and flatten_lists:
            flattened.update(
                flatten_dict(
                    {str(i): v for i, v in enumerate(value)},
                    prefix=f"{prefix}{key}{delimiter}",
                    delimiter=delimiter,
                    flatten_lists=flatten_lists,
                )
            )
        else:
            flattened[f"{prefix}{key}"] = value
    return flattened

