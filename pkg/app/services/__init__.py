from app.services.bdm_service import BdmService, bdm_service, get_bdm_service
from app.services.table_service import TableService, table_service, get_table_service
from app.services.curve_service import CurveService, curve_service, get_curve_service
from app.services.check_service import CheckService, check_service, get_check_service

__all__ = [
    # BDM Service
    "BdmService",
    "bdm_service",
    "get_bdm_service",

    # Table Service
    "TableService",
    "table_service",
    "get_table_service",

    # Curve Service
    "CurveService",
    "curve_service",
    "get_curve_service",

    # Check Service
    "CheckService",
    "check_service",
    "get_check_service",
]
