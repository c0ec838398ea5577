from typing import AsyncGenerator

import pytest
import pytest_asyncio
from httpx import ASGITransport, AsyncClient

from app.main import app
from app.services.certification import get_template
from app.services.moment_builder import MomentTemplate


@pytest.fixture(scope="session")
def template_n10() -> MomentTemplate:
    """Conditioned level-1 template for N=10."""
    return get_template(1, 10)


@pytest_asyncio.fixture(scope="function")
async def client() -> AsyncGenerator[AsyncClient, None]:
    """Create a test client bound to the application."""
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as ac:
        yield ac
