# Tests for upload_app