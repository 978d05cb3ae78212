import pytest

from ruleboost.synthetic import make_synthetic_task, write_config, write_task


@pytest.fixture()
def small_task(tmp_path):
    """A reduced synthetic task: fast enough for per-test pipeline runs."""
    task = make_synthetic_task(
        seed=11,
        n_clean=60,
        n_unlabeled=600,
        n_dev=60,
        n_test=200,
    )
    write_task(task, tmp_path)
    cfg_path = write_config(
        task,
        tmp_path,
        checkpoint_dir=str(tmp_path / "run"),
        seed=11,
        iterations=3,
        top_n=6,
        candidates_per_instance=6,
        budget=36,
        train={
            "learning_rate": 0.5,
            "epochs": 10,
            "batch_size": 32,
            "l2": 1e-4,
            "self_train_epochs": 1,
            "seed": 11,
        },
    )
    return task, cfg_path
