import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gtebench.datagen import generate_loan
from gtebench.model import ModelConfig, TrainConfig, train

# Training settings that take both default architectures to 100% on Loan.
LOAN_NN1 = dict(
    mcfg=ModelConfig((3, 16, 16, 2), "relu"),
    tcfg=TrainConfig(epochs=400, learning_rate=0.3, batch_size=16, seed=11),
)
LOAN_NN2 = dict(
    mcfg=ModelConfig((3, 32, 2), "tanh"),
    tcfg=TrainConfig(epochs=800, learning_rate=0.5, batch_size=16, seed=12),
)


@pytest.fixture(scope="session")
def loan_dataset():
    return generate_loan()


@pytest.fixture(scope="session")
def loan_nn1(loan_dataset):
    return train(loan_dataset, 1.0, LOAN_NN1["mcfg"], LOAN_NN1["tcfg"])


@pytest.fixture(scope="session")
def loan_nn2(loan_dataset):
    return train(loan_dataset, 1.0, LOAN_NN2["mcfg"], LOAN_NN2["tcfg"])
