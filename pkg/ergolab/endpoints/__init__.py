# FastAPI routers exposing the experiments
